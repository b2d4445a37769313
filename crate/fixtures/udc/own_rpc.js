var methods = {};
methods["sum"] = function (call) {
  var total = 0;
  let method = methods[call.method];
  total = total + 1;
  if (methods.hasOwnProperty(call.method)) {
    method(call);
  }
};
var onCall = function (event) {
  var call = JSON.parse(event.data);
  methods["sum"](call);
};
