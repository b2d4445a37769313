var table = {};
server.on("request", function (req) {
  var key = req.body;
  var h = table[key.name];
  if (table.hasOwnProperty(key.name)) {
    h(key);
  }
});
