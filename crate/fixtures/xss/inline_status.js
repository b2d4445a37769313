const status = function (request, response) {
  var state = request.state;
  response.send(encodeURIComponent(state));
};
